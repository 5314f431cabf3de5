#pragma once
// Umbrella header.

#include "defconv/algebra.hpp"
#include "defconv/divisibility.hpp"
#include "defconv/error.hpp"
#include "defconv/eval.hpp"
#include "defconv/formula.hpp"
#include "defconv/io.hpp"
#include "defconv/levy.hpp"
#include "defconv/measure.hpp"
#include "defconv/parser.hpp"
#include "defconv/semigroup.hpp"
#include "defconv/structure.hpp"
