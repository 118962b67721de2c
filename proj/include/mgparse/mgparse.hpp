#pragma once

#include "mgparse/lexicon.hpp"
#include "mgparse/category.hpp"
#include "mgparse/rules.hpp"
#include "mgparse/position.hpp"
#include "mgparse/probability.hpp"
#include "mgparse/hypothesis.hpp"
#include "mgparse/derivation.hpp"
#include "mgparse/unit_loops.hpp"
#include "mgparse/parser.hpp"
#include "mgparse/ctw.hpp"
