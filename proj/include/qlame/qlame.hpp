#pragma once

#include "qlame/bethe.hpp"
#include "qlame/difference_op.hpp"
#include "qlame/elliptic.hpp"
#include "qlame/errors.hpp"
#include "qlame/family.hpp"
#include "qlame/report.hpp"
#include "qlame/spectral.hpp"
#include "qlame/verify.hpp"
