#pragma once
// Convenience header pulling in the whole library.

#include "phi/asymptotics.hpp"
#include "phi/distance.hpp"
#include "phi/exact.hpp"
#include "phi/loss.hpp"
#include "phi/model.hpp"
#include "phi/numerics.hpp"
#include "phi/rational.hpp"
#include "phi/select.hpp"
#include "phi/smf.hpp"
#include "phi/textio.hpp"
