#pragma once

#include "tcfem/core.hpp"
#include "tcfem/mesh.hpp"
#include "tcfem/quadrature.hpp"
#include "tcfem/materials.hpp"
#include "tcfem/fem.hpp"
#include "tcfem/stepper.hpp"
#include "tcfem/config.hpp"
#include "tcfem/harness.hpp"
#include "tcfem/vtk.hpp"
#include "tcfem/trace_probe.hpp"
