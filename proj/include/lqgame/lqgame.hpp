#pragma once

#include "lqgame/baselines.hpp"
#include "lqgame/diagnostics.hpp"
#include "lqgame/errors.hpp"
#include "lqgame/experiments.hpp"
#include "lqgame/game.hpp"
#include "lqgame/inner_loop.hpp"
#include "lqgame/io.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/modelfree.hpp"
#include "lqgame/outer_loop.hpp"
#include "lqgame/parallel.hpp"
#include "lqgame/policy.hpp"
#include "lqgame/rng.hpp"
#include "lqgame/svg.hpp"
