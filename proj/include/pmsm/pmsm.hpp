#pragma once

#include "pmsm/analysis.hpp"
#include "pmsm/config.hpp"
#include "pmsm/controllers.hpp"
#include "pmsm/csv.hpp"
#include "pmsm/eig.hpp"
#include "pmsm/equilibrium.hpp"
#include "pmsm/gains.hpp"
#include "pmsm/lyapunov.hpp"
#include "pmsm/motor.hpp"
#include "pmsm/profile.hpp"
#include "pmsm/sim.hpp"
