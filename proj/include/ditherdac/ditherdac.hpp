#pragma once

#include "ditherdac/array.hpp"
#include "ditherdac/common.hpp"
#include "ditherdac/dither.hpp"
#include "ditherdac/evm.hpp"
#include "ditherdac/montecarlo.hpp"
#include "ditherdac/quantizer.hpp"
#include "ditherdac/rng.hpp"
#include "ditherdac/validation.hpp"
