#include <iostream>

#include "cca/cli.hpp"

int main(int argc, char** argv) {
  cca::cli::RunConfig config;
  try {
    config = cca::cli::parse_args(argc, argv);
  } catch (const cca::cli::UsageExit& e) {
    return e.code;
  } catch (const cca::Error& e) {
    std::cerr << nlohmann::json{{"error", cca::to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }
  return cca::cli::run_command(config, std::cerr, std::cerr);
}
