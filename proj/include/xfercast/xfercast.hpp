#pragma once

// Umbrella header for the whole library.

#include "xfercast/config.hpp"
#include "xfercast/errors.hpp"
#include "xfercast/evaluation.hpp"
#include "xfercast/fusion.hpp"
#include "xfercast/synth.hpp"
#include "xfercast/traces.hpp"
#include "xfercast/univariate.hpp"
