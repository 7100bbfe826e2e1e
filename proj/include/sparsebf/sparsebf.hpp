// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#pragma once

#include "sparsebf/beamforming.hpp"
#include "sparsebf/common.hpp"
#include "sparsebf/conic.hpp"
#include "sparsebf/design.hpp"
#include "sparsebf/group_qcqp.hpp"
#include "sparsebf/montecarlo.hpp"
#include "sparsebf/pipeline.hpp"
#include "sparsebf/scenario_io.hpp"
#include "sparsebf/sca_select.hpp"
#include "sparsebf/sdr_select.hpp"
#include "sparsebf/selection.hpp"
#include "sparsebf/signal_model.hpp"
#include "sparsebf/toeplitz_completion.hpp"
