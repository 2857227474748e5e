#pragma once

#include "onflow/backtest.hpp"
#include "onflow/baselines.hpp"
#include "onflow/cost_model.hpp"
#include "onflow/engine.hpp"
#include "onflow/errors.hpp"
#include "onflow/lognormal.hpp"
#include "onflow/market_data.hpp"
#include "onflow/simplex.hpp"
