#pragma once

#include "schemeplan/ids.hpp"
#include "schemeplan/model.hpp"
#include "schemeplan/dsl.hpp"
#include "schemeplan/wire.hpp"
#include "schemeplan/tables.hpp"
#include "schemeplan/regions.hpp"
#include "schemeplan/semantics.hpp"
#include "schemeplan/verifier.hpp"
#include "schemeplan/report.hpp"
#include "schemeplan/casl.hpp"
#include "schemeplan/classmodel.hpp"
