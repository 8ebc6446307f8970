// Batch front end: cheeger <command> [method|check] [key=value ...] [--config FILE]

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cheeger/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rescaled shape optimization laboratory"};
  std::vector<std::string> args;
  std::string config_path;
  app.add_option("-c,--config", config_path, "key=value config file; arguments override it");
  app.add_option("args", args,
                 "command (solve-torsion, solve-eigen, minimize, verify, oracle, sweep-alpha, "
                 "export), then relaxed|search for minimize or a check name for verify, then "
                 "key=value settings");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cheeger::kExitOk : cheeger::kExitUsage;
  }

  cheeger::RunConfig config;
  try {
    cheeger::ConfigMap map;
    if (!config_path.empty()) map = cheeger::read_config_file(config_path);
    std::size_t i = 0;
    if (i < args.size() && args[i].find('=') == std::string::npos) {
      map["command"] = args[i++];
      const auto& command = map["command"];
      if (i < args.size() && args[i].find('=') == std::string::npos) {
        if (command == "minimize") map["method"] = args[i++];
        else if (command == "verify") map["check"] = args[i++];
      }
    }
    for (; i < args.size(); ++i) cheeger::add_assignment(map, args[i]);
    config = cheeger::resolve_config(map);
  } catch (const cheeger::Error& e) {
    std::cerr << "error: " << e.what() << '\n' << app.help();
    return cheeger::kExitUsage;
  }
  return cheeger::run_guarded(config, std::cout, std::cerr);
}
