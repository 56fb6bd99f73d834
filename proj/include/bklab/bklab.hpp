#pragma once

#include "bklab/bk.hpp"
#include "bklab/census.hpp"
#include "bklab/context.hpp"
#include "bklab/dieudonne.hpp"
#include "bklab/field.hpp"
#include "bklab/grid.hpp"
#include "bklab/io.hpp"
#include "bklab/iso.hpp"
#include "bklab/linalg.hpp"
#include "bklab/locmodel.hpp"
#include "bklab/moduli.hpp"
#include "bklab/mpoly.hpp"
#include "bklab/semilinear.hpp"
#include "bklab/series.hpp"
