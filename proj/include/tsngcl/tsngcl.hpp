#pragma once

#include "tsngcl/analysis.hpp"
#include "tsngcl/baselines.hpp"
#include "tsngcl/curves.hpp"
#include "tsngcl/error.hpp"
#include "tsngcl/gcl_validator.hpp"
#include "tsngcl/harness.hpp"
#include "tsngcl/instance_io.hpp"
#include "tsngcl/model.hpp"
#include "tsngcl/numeric.hpp"
#include "tsngcl/proxy.hpp"
#include "tsngcl/schedule.hpp"
#include "tsngcl/simulator.hpp"
#include "tsngcl/synthesis.hpp"
#include "tsngcl/testgen.hpp"
