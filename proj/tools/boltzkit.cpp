// boltzkit <command> --config <file> [--seed S] [--out PATH]
//
// Exit codes: 0 pass, 1 estimate verdict failed, 2 configuration or module error.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "boltzkit/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw boltzkit::ConfigurationError("cannot read config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string strip_json_suffix(std::string p) {
  const std::string ext = ".json";
  if (p.size() > ext.size() && p.compare(p.size() - ext.size(), ext.size(), ext) == 0) p.resize(p.size() - ext.size());
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for the kinetic Boltzmann hierarchy"};
  std::string command, config_path, out;
  long long seed = -1;
  app.add_option("command", command, "strichartz | bilinear | annihilation | boardgame | duhamel | uniqueness | solve")
      ->required();
  app.add_option("--config,-c", config_path, "key = value config file")->required();
  app.add_option("--seed,-s", seed, "overrides the config seed");
  app.add_option("--out,-o", out, "report prefix; writes PREFIX.json, PREFIX.csv, PREFIX.meta.json");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (out.empty()) out = command + "_report";
  out = strip_json_suffix(out);

  auto fail = [&](const std::string& kind, const std::string& message) {
    const auto j = boltzkit::error_json(kind, message, command);
    std::cerr << j.dump() << "\n";
    try {
      boltzkit::write_text(out + ".json", j.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return 2;
  };

  try {
    auto cfg = boltzkit::parse_config(read_file(config_path), command);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    else if (seed != -1) throw boltzkit::ConfigurationError("seed must be nonnegative");
    cfg.out_path = out;
    auto result = boltzkit::run(cfg);
    boltzkit::write_outputs(result, out);
    std::cout << result.summary << "\n";
    return result.exit_code;
  } catch (const boltzkit::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("configuration", e.what());
  } catch (const std::out_of_range& e) {
    return fail("configuration", e.what());
  } catch (const std::bad_alloc&) {
    return fail("resource", "out of memory");
  }
}
