#pragma once

#include "hte_bandit/core.hpp"
#include "hte_bandit/environments.hpp"
#include "hte_bandit/harness/config.hpp"
#include "hte_bandit/harness/csv.hpp"
#include "hte_bandit/harness/experiment.hpp"
#include "hte_bandit/harness/svg.hpp"
#include "hte_bandit/harness/validate.hpp"
#include "hte_bandit/linalg.hpp"
#include "hte_bandit/oracle.hpp"
#include "hte_bandit/policy.hpp"
#include "hte_bandit/validation.hpp"
