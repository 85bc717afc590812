#pragma once

#include "stbc/certify.hpp"
#include "stbc/channel.hpp"
#include "stbc/constellation.hpp"
#include "stbc/decoders.hpp"
#include "stbc/design.hpp"
#include "stbc/error.hpp"
#include "stbc/experiment.hpp"
#include "stbc/matrix.hpp"
#include "stbc/rng.hpp"
