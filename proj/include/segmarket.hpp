#pragma once

#include "segmarket/errors.hpp"
#include "segmarket/roots.hpp"
#include "segmarket/signal.hpp"
#include "segmarket/valuation.hpp"
#include "segmarket/baseline.hpp"
#include "segmarket/groups.hpp"
#include "segmarket/simulator.hpp"
