#pragma once

#include "lpr/level.hpp"
#include "lpr/ast.hpp"
#include "lpr/algebra.hpp"
#include "lpr/program.hpp"
#include "lpr/printer.hpp"
#include "lpr/errors.hpp"
#include "lpr/kinding.hpp"
#include "lpr/typecheck.hpp"
#include "lpr/heap.hpp"
#include "lpr/eval.hpp"
#include "lpr/gc.hpp"
#include "lpr/termgen.hpp"
#include "lpr/parser.hpp"
