#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gxe/config.hpp"
#include "gxe/phenosim.hpp"

namespace gxe {

// Scan-stage replicate subset: "all", a hypothesis ("H0"/"H1"), an index or
// inclusive range ("3", "0-9"), or both ("H1:0-9").
struct ReplicateSelector {
    std::optional<Hypothesis> hypothesis;
    std::optional<std::pair<std::size_t, std::size_t>> range;

    static ReplicateSelector parse(const std::string& token);
    bool matches(Hypothesis h, std::size_t index) const;
};

// Pipeline stages (the CLI subcommands). Each writes its artifacts under
// the configured output directory, stamps them with the config hash and
// master seed, and logs JSON-lines events to logs/<stage>.jsonl. Outputs
// are deterministic for a fixed seed at any thread count.
void cmd_qc_pca(const RunConfig& cfg);
void cmd_simulate(const RunConfig& cfg);
void cmd_scan(const RunConfig& cfg,
              std::optional<ScanMethod> method = std::nullopt,
              const ReplicateSelector& selector = {},
              const std::optional<std::string>& region_token = std::nullopt);
void cmd_power(const RunConfig& cfg,
               const std::optional<std::string>& region_token = std::nullopt);

// Argument-vector entry point used by both main() and the tests; returns
// the process exit code (0 ok, 1 configuration error, 2 data error).
int run_cli(const std::vector<std::string>& args);

}  // namespace gxe
