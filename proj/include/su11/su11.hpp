#pragma once

#include "su11/config.hpp"
#include "su11/dataset.hpp"
#include "su11/engine.hpp"
#include "su11/errors.hpp"
#include "su11/estimators.hpp"
#include "su11/experiments.hpp"
#include "su11/model.hpp"
#include "su11/pulse.hpp"
#include "su11/random.hpp"
#include "su11/svg.hpp"
#include "su11/trajectory_io.hpp"
