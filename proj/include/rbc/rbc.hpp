#pragma once

#include "rbc/attacks.hpp"
#include "rbc/bits.hpp"
#include "rbc/bridge.hpp"
#include "rbc/channel.hpp"
#include "rbc/config.hpp"
#include "rbc/converter.hpp"
#include "rbc/detector.hpp"
#include "rbc/ecc.hpp"
#include "rbc/errors.hpp"
#include "rbc/gf2.hpp"
#include "rbc/harness.hpp"
#include "rbc/models.hpp"
#include "rbc/random.hpp"
#include "rbc/stats.hpp"
#include "rbc/watermark.hpp"
