#pragma once

#include "abdsde/abdsde_solver.hpp"
#include "abdsde/comparison_harness.hpp"
#include "abdsde/conditional_expectation.hpp"
#include "abdsde/delay_structure.hpp"
#include "abdsde/discrete_oracle.hpp"
#include "abdsde/duality_harness.hpp"
#include "abdsde/error.hpp"
#include "abdsde/generator_model.hpp"
#include "abdsde/stochastic_core.hpp"
#include "abdsde/tree_model.hpp"
