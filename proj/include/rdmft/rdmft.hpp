#pragma once

#include "rdmft/bogoliubov.hpp"
#include "rdmft/ensemble.hpp"
#include "rdmft/fock.hpp"
#include "rdmft/functional.hpp"
#include "rdmft/hamiltonian.hpp"
#include "rdmft/random.hpp"
#include "rdmft/reference.hpp"
#include "rdmft/representability.hpp"
