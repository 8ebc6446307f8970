#pragma once

#include "cheeger/error.hpp"
#include "cheeger/grid.hpp"
#include "cheeger/field.hpp"
#include "cheeger/linalg.hpp"
#include "cheeger/pde.hpp"
#include "cheeger/functional.hpp"
#include "cheeger/optimize.hpp"
#include "cheeger/verify.hpp"
#include "cheeger/io.hpp"
#include "cheeger/config.hpp"
#include "cheeger/run.hpp"
