#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace lab::cli {

struct Certificate {
    std::string name;  // module-qualified, e.g. "path.shell0.length"
    bool pass = false;
    nlohmann::json detail;
};

// Collects certificates and writes every output file with the config hash and module versions.
class Run {
public:
    Run(RunConfig cfg, std::string command);

    const RunConfig& cfg() const { return cfg_; }
    const std::string& hash() const { return hash_; }

    void certify(const std::string& name, bool pass, nlohmann::json detail = nlohmann::json::object());
    void fail(const std::string& stage, const std::exception& e);  // a module threw; recorded as a failed certificate
    void timing(const std::string& stage, double seconds) { timing_[stage] = seconds; }

    void write_json(const std::string& file, nlohmann::json payload);
    void write_text(const std::string& file, const std::string& body, const std::string& comment);  // obj, csv

    bool all_pass() const;
    void finish();  // report.json

private:
    RunConfig cfg_;
    std::string command_, hash_;
    std::filesystem::path dir_;
    std::vector<Certificate> certs_;
    std::vector<std::string> outputs_;
    nlohmann::json timing_ = nlohmann::json::object();

    void prepare();
};

// Each returns normally when its module calls succeed; certificate verdicts live in the Run.
void cmd_lattice(Run& run);
void cmd_lift(Run& run);
void cmd_barrier(Run& run);
void cmd_certify_path(Run& run);
void cmd_runge(Run& run);
void cmd_potential(Run& run);
void cmd_pipeline(Run& run);

}  // namespace lab::cli
