#pragma once

#include "hems/analysis.hpp"
#include "hems/config.hpp"
#include "hems/control.hpp"
#include "hems/dataio.hpp"
#include "hems/ddpg.hpp"
#include "hems/domain.hpp"
#include "hems/env.hpp"
#include "hems/mpc.hpp"
#include "hems/nn.hpp"
#include "hems/simplex.hpp"
