#pragma once

#include "ctqw/config.hpp"
#include "ctqw/errors.hpp"
#include "ctqw/hamiltonian.hpp"
#include "ctqw/harness.hpp"
#include "ctqw/observables.hpp"
#include "ctqw/output.hpp"
#include "ctqw/parallel.hpp"
#include "ctqw/propagator.hpp"
#include "ctqw/sequence.hpp"
