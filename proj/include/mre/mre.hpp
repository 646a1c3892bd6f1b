#pragma once

#include "mre/analytic.hpp"
#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/forward.hpp"
#include "mre/harness.hpp"
#include "mre/lm.hpp"
#include "mre/mesh.hpp"
#include "mre/model.hpp"
#include "mre/presets.hpp"
#include "mre/sensitivity.hpp"
#include "mre/verify.hpp"
