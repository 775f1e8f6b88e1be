#pragma once

#include "vq/errors.hpp"
#include "vq/types.hpp"
#include "vq/exact_sum.hpp"
#include "vq/core.hpp"
#include "vq/parallel.hpp"
#include "vq/codec.hpp"
#include "vq/io.hpp"
#include "vq/image.hpp"
#include "vq/bench.hpp"
