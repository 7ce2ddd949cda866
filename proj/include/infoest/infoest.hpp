#pragma once

#include "infoest/config.hpp"
#include "infoest/estimators.hpp"
#include "infoest/identities.hpp"
#include "infoest/io.hpp"
#include "infoest/likelihood.hpp"
#include "infoest/malliavin.hpp"
#include "infoest/mc.hpp"
#include "infoest/oracle.hpp"
#include "infoest/prior.hpp"
#include "infoest/rng.hpp"
#include "infoest/wiener.hpp"
