#pragma once

#include "onseg/core.hpp"
#include "onseg/curvature.hpp"
#include "onseg/dataset.hpp"
#include "onseg/estimator.hpp"
#include "onseg/experiment.hpp"
#include "onseg/geometry.hpp"
#include "onseg/learners.hpp"
#include "onseg/losses.hpp"
#include "onseg/schedule.hpp"
