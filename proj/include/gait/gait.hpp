#pragma once

#include "gait/distance.hpp"
#include "gait/errors.hpp"
#include "gait/eval.hpp"
#include "gait/hapt.hpp"
#include "gait/identification.hpp"
#include "gait/io.hpp"
#include "gait/segmentation.hpp"
#include "gait/signal.hpp"
