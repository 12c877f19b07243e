#pragma once

#include "algebra.hpp"
#include "bmetric.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "integral.hpp"
#include "io.hpp"
#include "scenario.hpp"
#include "stein.hpp"
