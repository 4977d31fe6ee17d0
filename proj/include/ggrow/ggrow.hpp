#pragma once

#include "ggrow/block_update.hpp"
#include "ggrow/descent.hpp"
#include "ggrow/errors.hpp"
#include "ggrow/evaluation.hpp"
#include "ggrow/growth.hpp"
#include "ggrow/matrix_io.hpp"
#include "ggrow/prng.hpp"
#include "ggrow/selection.hpp"
#include "ggrow/spd_core.hpp"
#include "ggrow/support.hpp"
#include "ggrow/sym_matrix.hpp"
#include "ggrow/synthetic.hpp"
#include "ggrow/version.hpp"
