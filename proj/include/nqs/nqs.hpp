// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nqs/activations.hpp"
#include "nqs/analytic.hpp"
#include "nqs/ansatz.hpp"
#include "nqs/approx.hpp"
#include "nqs/core.hpp"
#include "nqs/entanglement.hpp"
#include "nqs/errors.hpp"
#include "nqs/experiments.hpp"
#include "nqs/graph.hpp"
#include "nqs/graph_json.hpp"
#include "nqs/parallel.hpp"
#include "nqs/statevector.hpp"
