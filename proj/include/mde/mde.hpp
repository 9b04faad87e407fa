#pragma once

#include "mde/checkpoint.hpp"
#include "mde/config.hpp"
#include "mde/consistency.hpp"
#include "mde/data.hpp"
#include "mde/error.hpp"
#include "mde/evaluation.hpp"
#include "mde/expressivity.hpp"
#include "mde/loss.hpp"
#include "mde/manifest.hpp"
#include "mde/model.hpp"
#include "mde/optim.hpp"
#include "mde/patterns.hpp"
#include "mde/training.hpp"
