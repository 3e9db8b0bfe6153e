#pragma once

#include "app_config.hpp"

namespace memfit::cli {

int cmd_ingest(const AppConfig& cfg);
int cmd_train(AppConfig cfg);
int cmd_tune(AppConfig cfg);
int cmd_evaluate(const AppConfig& cfg);
int cmd_pareto(AppConfig cfg);
int cmd_predict(const AppConfig& cfg);
int cmd_serve(const AppConfig& cfg);

} // namespace memfit::cli
