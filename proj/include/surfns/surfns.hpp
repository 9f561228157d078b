#pragma once
#include "surfns/analysis.hpp"
#include "surfns/dual.hpp"
#include "surfns/fespace.hpp"
#include "surfns/forms.hpp"
#include "surfns/geometry.hpp"
#include "surfns/lagrange.hpp"
#include "surfns/mesh.hpp"
#include "surfns/quadrature.hpp"
#include "surfns/simulation.hpp"
#include "surfns/solver.hpp"
#include "surfns/checks.hpp"
