#pragma once

#include "harness/experiments.hpp"
#include "harness/records.hpp"
