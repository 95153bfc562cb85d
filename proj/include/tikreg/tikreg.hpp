#pragma once

#include "tikreg/error.hpp"
#include "tikreg/examples_registry.hpp"
#include "tikreg/growth.hpp"
#include "tikreg/io.hpp"
#include "tikreg/measure_lemmas.hpp"
#include "tikreg/rates_harness.hpp"
#include "tikreg/source_conditions.hpp"
#include "tikreg/spectral_core.hpp"
#include "tikreg/tikhonov.hpp"
