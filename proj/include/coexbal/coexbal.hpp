#pragma once

#include "assembly.hpp"
#include "balance.hpp"
#include "coexec.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "report.hpp"
#include "sfc.hpp"
