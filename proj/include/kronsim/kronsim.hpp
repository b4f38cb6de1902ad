#pragma once

#include "kronsim/case.hpp"
#include "kronsim/case_io.hpp"
#include "kronsim/csv.hpp"
#include "kronsim/devices.hpp"
#include "kronsim/equilibrium.hpp"
#include "kronsim/error.hpp"
#include "kronsim/events.hpp"
#include "kronsim/models.hpp"
#include "kronsim/network.hpp"
#include "kronsim/rk4.hpp"
#include "kronsim/simulate.hpp"
#include "kronsim/svg.hpp"
#include "kronsim/timeseries.hpp"
#include "kronsim/xy.hpp"
