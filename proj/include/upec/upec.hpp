#pragma once

#include "upec/attack_demo.hpp"
#include "upec/dimacs.hpp"
#include "upec/netlist_io.hpp"
#include "upec/procedure.hpp"
#include "upec/report.hpp"
#include "upec/soc_models.hpp"
#include "upec/vcd.hpp"
