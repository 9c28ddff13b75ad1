#ifndef CLAB_CLAB_HPP
#define CLAB_CLAB_HPP

#include "clab/errors.hpp"
#include "clab/fit.hpp"
#include "clab/greens.hpp"
#include "clab/harness.hpp"
#include "clab/linalg.hpp"
#include "clab/lyapunov.hpp"
#include "clab/model.hpp"
#include "clab/parallel.hpp"
#include "clab/rng.hpp"
#include "clab/symplectic.hpp"
#include "clab/transfer.hpp"
#include "clab/types.hpp"

#endif
