#pragma once

#include "relaytune/core.hpp"
#include "relaytune/dnn/identify.hpp"
#include "relaytune/io/csv.hpp"
#include "relaytune/io/json.hpp"
#include "relaytune/io/svg.hpp"
#include "relaytune/relay/relay_test.hpp"
#include "relaytune/repro/checks.hpp"
#include "relaytune/servo/frames.hpp"
#include "relaytune/servo/presets.hpp"
#include "relaytune/servo/scenario.hpp"
#include "relaytune/tuning/grid.hpp"
