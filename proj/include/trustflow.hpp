#pragma once

#include "trustflow/error.hpp"
#include "trustflow/json_util.hpp"
#include "trustflow/app_model.hpp"
#include "trustflow/catalog.hpp"
#include "trustflow/arch_scan.hpp"
#include "trustflow/slicer.hpp"
#include "trustflow/flowgraph.hpp"
#include "trustflow/risk.hpp"
#include "trustflow/report.hpp"
#include "trustflow/pipeline.hpp"
#include "trustflow/scenarios.hpp"
