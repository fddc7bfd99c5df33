#pragma once

#include "adec/errors.hpp"
#include "adec/linalg.hpp"
#include "adec/operators.hpp"
#include "adec/frames.hpp"
#include "adec/quantizer.hpp"
#include "adec/decimation.hpp"
#include "adec/codec.hpp"
#include "adec/harness.hpp"
