#pragma once

// everything except io.hpp, which pulls in OpenSSL and fmt

#include "analytic.hpp"
#include "certify.hpp"
#include "config.hpp"
#include "elliptic.hpp"
#include "flow.hpp"
#include "grid.hpp"
#include "kummer.hpp"
#include "metric.hpp"
#include "operators.hpp"
#include "parabolic.hpp"
#include "presets.hpp"
#include "special.hpp"
#include "target.hpp"
