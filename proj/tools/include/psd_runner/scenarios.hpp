#pragma once

#include "psd_runner/config.hpp"
#include "psd_runner/report.hpp"

#include <psd/error.hpp>
#include <psd/proximity.hpp>

#include <string>
#include <vector>

namespace psd::runner {

// Momentum-space w of the symmetric packet pair from the analytic
// log-densities, so values far below the double range stay meaningful.
LogW gaussian_momentum_w(const PacketConfig& p);

// Each run_* writes its data files into cfg.out_dir and records checks; errors
// propagate as psd::Error. run() wraps them and always writes report.json.
void run_gaussian(RunReport& rep);
void run_scattering(RunReport& rep);
void run_custom_tree(RunReport& rep);
void run_verify(RunReport& rep);

RunReport run(const ScenarioConfig& cfg);

int exit_code_for(ErrorKind kind);

// Names accepted by verify.inject_fault.
const std::vector<std::string>& fault_names();

}  // namespace psd::runner
