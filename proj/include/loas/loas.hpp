#pragma once

#include "loas/common.hpp"
#include "loas/tensor.hpp"
#include "loas/compress.hpp"
#include "loas/tppe.hpp"
#include "loas/memory.hpp"
#include "loas/engine.hpp"
#include "loas/baselines.hpp"
#include "loas/workload.hpp"
#include "loas/config_file.hpp"
#include "loas/report.hpp"
