// SPDX-License-Identifier: Apache-2.0
// Bundled synthetic environments. Sub-agents and tools mirror a small
// assistant stack: a QA agent over a country fact table, an e-commerce
// function-call agent with 12 shop APIs, a general function-call agent and a
// math agent with four arithmetic tools.
#include <array>
#include <cmath>
#include <functional>
#include <set>

#include "jointrl/orchestrator.hpp"
#include "jointrl/text.hpp"

namespace jointrl {

namespace {

struct Country {
  const char* name;
  const char* capital;
  const char* currency;
  const char* language;
  const char* continent;
};

constexpr std::array<Country, 8> kCountries{{
    {"france", "paris", "euro", "french", "europe"},
    {"japan", "tokyo", "yen", "japanese", "asia"},
    {"brazil", "brasilia", "real", "portuguese", "south america"},
    {"kenya", "nairobi", "shilling", "swahili", "africa"},
    {"canada", "ottawa", "canadian dollar", "english", "north america"},
    {"egypt", "cairo", "pound", "arabic", "africa"},
    {"india", "new delhi", "rupee", "hindi", "asia"},
    {"mexico", "mexico city", "peso", "spanish", "north america"},
}};

struct Priced {
  const char* word;
  int value;
};

constexpr std::array<Priced, 5> kShopDeposits{{
    {"toy", 6000}, {"furniture", 10000}, {"clothing", 5000}, {"book", 3000}, {"food", 8000}}};
constexpr std::array<Priced, 5> kRegionFees{{
    {"north", 12}, {"south", 15}, {"east", 10}, {"west", 18}, {"remote", 30}}};
constexpr std::array<Priced, 3> kExchangeRates{{
    {"dollars", 7}, {"euros", 8}, {"pounds", 9}}};
constexpr std::array<Priced, 4> kShopBalances{{
    {"sunrise", 5000}, {"harbor", 7000}, {"maple", 9000}, {"cedar", 4000}}};

struct ToolPhrase {
  const char* tool;
  const char* phrase;
};

constexpr std::array<ToolPhrase, 12> kDomainTools{{
    {"search_order_code", "search the order code of my purchase"},
    {"check_shop_expenses", "check the shop expenses and deposit"},
    {"query_logistics", "query the logistics status of my parcel"},
    {"apply_refund", "apply for a refund on a returned item"},
    {"modify_address", "modify the delivery address"},
    {"check_inventory", "check the inventory of my listed goods"},
    {"query_coupon", "query the coupon rules for my store"},
    {"update_price", "update the price of a product"},
    {"query_settlement", "query the settlement balance"},
    {"bind_bank_card", "bind a bank card to the store"},
    {"check_shop_rating", "check the shop rating score"},
    {"cancel_order", "cancel an unpaid order"},
}};

constexpr std::array<ToolPhrase, 6> kGeneralTools{{
    {"weather_forecast", "get the weather forecast"},
    {"currency_exchange", "look up a currency exchange rate"},
    {"football_statistics", "fetch football statistics for a league"},
    {"email_bounce_check", "check bounced email recipients"},
    {"flight_status", "look up a flight status"},
    {"stock_quote", "get a stock quote"},
}};

constexpr std::array<ToolPhrase, 4> kMathTools{{
    {"add", "+ plus sum"},
    {"subtract", "- minus remains"},
    {"multiply", "* times total"},
    {"divide", "/ quotient"},
}};
constexpr std::array<const char*, 4> kQaTools{
    {"lookup_capital", "lookup_currency", "lookup_language", "lookup_continent"}};

std::string intention_of(const nlohmann::json& arguments) {
  if (arguments.contains("intention")) {
    const auto& value = arguments["intention"];
    return to_lower(value.is_string() ? value.get<std::string>() : value.dump());
  }
  return {};
}

bool has_word(const std::string& text, std::string_view word) {
  const auto tokens = normalized_tokens(text);
  const auto words = normalized_tokens(word);
  for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < words.size() && match; ++k) {
      match = tokens[i + k] == words[k];
    }
    if (match) return true;
  }
  return false;
}

template <std::size_t N>
const Priced* find_priced(const std::array<Priced, N>& table, const std::string& text) {
  for (const auto& item : table) {
    if (has_word(text, item.word)) return &item;
  }
  return nullptr;
}

const Country* find_country(const std::string& text) {
  for (const auto& country : kCountries) {
    if (has_word(text, country.name)) return &country;
  }
  return nullptr;
}

std::string math_tool(std::string_view op, const nlohmann::json& arguments) {
  const auto numbers = extract_numbers(intention_of(arguments));
  if (numbers.size() < 2) return "error: need two operands";
  const double a = numbers[0];
  const double b = numbers[1];
  if (op == "add") return format_number(a + b);
  if (op == "subtract") return format_number(a - b);
  if (op == "multiply") return format_number(a * b);
  if (b == 0.0) return "error: division by zero";
  return format_number(a / b);
}

std::string qa_tool(std::string_view tool, const nlohmann::json& arguments) {
  const auto* country = find_country(intention_of(arguments));
  if (country == nullptr) return "unknown";
  if (tool == "lookup_capital") return country->capital;
  if (tool == "lookup_currency") return country->currency;
  if (tool == "lookup_language") return country->language;
  return country->continent;
}

std::string domain_tool(std::string_view tool, const nlohmann::json& arguments) {
  const auto text = intention_of(arguments);
  const std::string name(tool);
  if (tool == "check_shop_expenses") {
    if (const auto* shop = find_priced(kShopDeposits, text)) {
      return name + ": deposit " + std::to_string(shop->value) + " yuan per shop per year";
    }
    return name + ": deposit rules depend on the shop category";
  }
  if (tool == "query_logistics") {
    if (const auto* region = find_priced(kRegionFees, text)) {
      return name + ": shipping fee " + std::to_string(region->value) + " yuan per parcel";
    }
    return name + ": parcel is in transit";
  }
  if (tool == "query_settlement") {
    if (const auto* shop = find_priced(kShopBalances, text)) {
      return name + ": settlement balance " + std::to_string(shop->value) + " yuan";
    }
    return name + ": settlement is up to date";
  }
  return name + ": request completed";
}

std::string general_tool(std::string_view tool, const nlohmann::json& arguments) {
  const std::string name(tool);
  if (tool == "currency_exchange") {
    if (const auto* rate = find_priced(kExchangeRates, intention_of(arguments))) {
      return name + ": rate " + std::to_string(rate->value) + " yuan per unit";
    }
    return name + ": rates are published daily";
  }
  return name + ": request completed";
}

// Which tool an oracle sub-agent picks for an intention.
std::string oracle_math_tool(const std::string& text) {
  if (text.find('*') != std::string::npos || has_word(text, "total") ||
      has_word(text, "exchanging")) {
    return "multiply";
  }
  if (text.find('/') != std::string::npos) return "divide";
  if (text.find('-') != std::string::npos || has_word(text, "remains")) {
    return "subtract";
  }
  return "add";
}

std::string oracle_qa_tool(const std::string& text) {
  if (has_word(text, "capital")) return "lookup_capital";
  if (has_word(text, "currency")) return "lookup_currency";
  if (has_word(text, "language")) return "lookup_language";
  return "lookup_continent";
}

template <std::size_t N>
std::string oracle_phrase_tool(const std::array<ToolPhrase, N>& tools,
                               const std::string& text) {
  for (const auto& tool : tools) {
    if (has_word(text, tool.phrase)) return tool.tool;
  }
  if (has_word(text, "deposit")) return "check_shop_expenses";
  if (has_word(text, "shipping")) return "query_logistics";
  if (has_word(text, "settlement")) return "query_settlement";
  if (has_word(text, "exchanging")) return "currency_exchange";
  return tools.front().tool;
}

// `keep` filters the tool table; sub-agents left without tools are skipped.
void add_agents(Environment& env,
                const std::function<bool(std::string_view)>& keep = nullptr) {
  auto kept = [&](std::string_view tool) { return !keep || keep(tool); };
  auto register_agent = [&](SubAgentInfo info, ToolFunction scripted) {
    if (!info.tools.empty()) env.add_sub_agent(std::move(info), std::move(scripted));
  };

  SubAgentInfo qa{"qa_agent", AgentRole::kQa, {},
                  "country facts: capital city, currency, language spoken, continent"};
  for (const auto* tool : kQaTools) {
    if (!kept(tool)) continue;
    qa.tools.emplace_back(tool);
    env.add_tool(tool, [name = std::string(tool)](const nlohmann::json& args) {
      return qa_tool(name, args);
    });
  }
  register_agent(qa, [](const nlohmann::json& args) {
    return qa_tool(oracle_qa_tool(intention_of(args)), args);
  });

  SubAgentInfo domain{"domain_agent", AgentRole::kFunctionCallDomain, {},
                      "store and shop operations: order, purchase, deposit, shops, "
                      "logistics, parcel, parcels, shipping, refund, inventory, coupon, "
                      "price, settlement, bank card, rating"};
  for (const auto& tool : kDomainTools) {
    if (!kept(tool.tool)) continue;
    domain.tools.emplace_back(tool.tool);
    env.add_tool(
        tool.tool,
        [name = std::string(tool.tool)](const nlohmann::json& args) {
          return domain_tool(name, args);
        },
        tool.phrase);
  }
  register_agent(domain, [](const nlohmann::json& args) {
    return domain_tool(oracle_phrase_tool(kDomainTools, intention_of(args)), args);
  });

  SubAgentInfo general{"general_agent", AgentRole::kFunctionCallGeneral, {},
                       "public information: weather forecast, currency exchange rate, "
                       "exchanging, football statistics, email, flight status, stock quote"};
  for (const auto& tool : kGeneralTools) {
    if (!kept(tool.tool)) continue;
    general.tools.emplace_back(tool.tool);
    env.add_tool(
        tool.tool,
        [name = std::string(tool.tool)](const nlohmann::json& args) {
          return general_tool(name, args);
        },
        tool.phrase);
  }
  register_agent(general, [](const nlohmann::json& args) {
    return general_tool(oracle_phrase_tool(kGeneralTools, intention_of(args)), args);
  });

  SubAgentInfo math{"math_agent", AgentRole::kMath, {},
                    "arithmetic: compute + - * /"};
  for (const auto& tool : kMathTools) {
    if (!kept(tool.tool)) continue;
    math.tools.emplace_back(tool.tool);
    env.add_tool(
        tool.tool,
        [name = std::string(tool.tool)](const nlohmann::json& args) {
          return math_tool(name, args);
        },
        tool.phrase);
  }
  register_agent(math, [](const nlohmann::json& args) {
    return math_tool(oracle_math_tool(intention_of(args)), args);
  });
}

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& items, std::uint64_t seed, std::uint64_t salt) {
  return items[mix_seed(seed, salt) % N];
}

TaskInstance make_task(std::string_view env, TaskKind kind, std::uint64_t seed,
                       std::string query, std::string answer,
                       std::map<std::string, std::string> metadata = {}) {
  TaskInstance task;
  task.id = std::string(env) + "-" + std::string(to_string(kind)) + "-" +
            std::to_string(seed);
  task.kind = kind;
  task.query = std::move(query);
  task.answer = std::move(answer);
  task.metadata = std::move(metadata);
  return task;
}

TaskInstance math_task(std::string_view env, std::uint64_t s) {
  static constexpr std::array<char, 4> kOps{'+', '-', '/', '*'};
  const long long a = 1000LL * static_cast<long long>(1 + (3 * s + 2) % 9) +
                      100LL * static_cast<long long>((s / 9) % 10);
  const long long b = 2 + static_cast<long long>((s * s) % 7);
  const char op = kOps[s % 4];
  std::string query;
  long long result = 0;
  switch (op) {
    case '+':
      query = "compute " + std::to_string(a) + "+" + std::to_string(b);
      result = a + b;
      break;
    case '-':
      query = "compute " + std::to_string(a) + "-" + std::to_string(b);
      result = a - b;
      break;
    case '/':
      query = "compute " + std::to_string(a * b) + "/" + std::to_string(b);
      result = a;
      break;
    default:
      query = "compute " + std::to_string(a) + "*" + std::to_string(b);
      result = a * b;
      break;
  }
  return make_task(env, TaskKind::kMath, s, query, std::to_string(result),
                   {{"agent", "math_agent"}});
}

TaskInstance qa_task(std::string_view env, std::uint64_t s) {
  const auto& country = pick(kCountries, s, 1);
  switch (mix_seed(s, 2) % 4) {
    case 0:
      return make_task(env, TaskKind::kQa, s,
                       std::string("what is the capital of ") + country.name,
                       country.capital, {{"agent", "qa_agent"}});
    case 1:
      return make_task(env, TaskKind::kQa, s,
                       std::string("what currency is used in ") + country.name,
                       country.currency, {{"agent", "qa_agent"}});
    case 2:
      return make_task(env, TaskKind::kQa, s,
                       std::string("what language is spoken in ") + country.name,
                       country.language, {{"agent", "qa_agent"}});
    default:
      return make_task(env, TaskKind::kQa, s,
                       std::string("on which continent is ") + country.name,
                       country.continent, {{"agent", "qa_agent"}});
  }
}

// Odd seeds name a shop API, even seeds a general API.
TaskInstance function_call_task(std::string_view env, std::uint64_t s) {
  static constexpr std::array<const char*, 3> kShopPrefix{
      "in my store, please ", "as a shop owner i want to ", "shop assistant, help me "};
  static constexpr std::array<const char*, 3> kGeneralPrefix{
      "could you ", "i would like to ", "please help me "};
  if (s % 2 == 1) {
    const auto& tool = pick(kDomainTools, s, 3);
    return make_task(env, TaskKind::kFunctionCall, s,
                     std::string(pick(kShopPrefix, s, 4)) + tool.phrase, tool.tool,
                     {{"agent", "domain_agent"}});
  }
  const auto& tool = pick(kGeneralTools, s, 3);
  return make_task(env, TaskKind::kFunctionCall, s,
                   std::string(pick(kGeneralPrefix, s, 4)) + tool.phrase, tool.tool,
                   {{"agent", "general_agent"}});
}

TaskInstance cooperative_task(std::string_view env, std::uint64_t s) {
  const long long n = 2 + static_cast<long long>(mix_seed(s, 5) % 8);
  switch (s % 4) {
    case 0: {
      const auto& shop = pick(kShopDeposits, s, 6);
      return make_task(env, TaskKind::kCooperative, s,
                       "what is the total deposit for opening " + std::to_string(n) +
                           " " + shop.word + " shops",
                       std::to_string(n * shop.value),
                       {{"plan", "domain_agent,check_shop_expenses,math_agent,multiply"}});
    }
    case 1: {
      const auto& region = pick(kRegionFees, s, 6);
      return make_task(env, TaskKind::kCooperative, s,
                       "what is the total shipping fee for sending " +
                           std::to_string(n) + " parcels to the " + region.word,
                       std::to_string(n * region.value),
                       {{"plan", "domain_agent,query_logistics,math_agent,multiply"}});
    }
    case 2: {
      const auto& rate = pick(kExchangeRates, s, 6);
      const long long amount = 10 * n;
      return make_task(env, TaskKind::kCooperative, s,
                       "how many yuan do i get when exchanging " +
                           std::to_string(amount) + " " + rate.word,
                       std::to_string(amount * rate.value),
                       {{"plan", "general_agent,currency_exchange,math_agent,multiply"}});
    }
    default: {
      const auto& shop = pick(kShopBalances, s, 6);
      const long long refund = 100 * n;
      return make_task(env, TaskKind::kCooperative, s,
                       std::string("how much settlement balance remains in the ") +
                           shop.word + " shop after a refund of " +
                           std::to_string(refund) + " yuan",
                       std::to_string(shop.value - refund),
                       {{"plan", "domain_agent,query_settlement,math_agent,subtract"}});
    }
  }
}

std::shared_ptr<Environment> routing_environment() {
  auto env = std::make_shared<Environment>("routing");
  add_agents(*env);
  env->set_task_generator(
      {TaskKind::kMath, TaskKind::kQa, TaskKind::kFunctionCall},
      [](TaskKind kind, std::uint64_t seed) {
        switch (kind) {
          case TaskKind::kMath:
            return math_task("routing", seed);
          case TaskKind::kQa:
            return qa_task("routing", seed);
          default:
            return function_call_task("routing", seed);
        }
      });
  // one task per sub-agent in turn: math, qa, shop API, general API
  env->set_dataset_schedule([](std::size_t i, std::uint64_t seed) {
    const auto base = mix_seed(seed, i) >> 1;
    switch (i % 4) {
      case 0:
        return std::make_pair(TaskKind::kMath, base);
      case 1:
        return std::make_pair(TaskKind::kQa, base);
      case 2:
        return std::make_pair(TaskKind::kFunctionCall, base * 2 + 1);
      default:
        return std::make_pair(TaskKind::kFunctionCall, base * 2);
    }
  });
  return env;
}

std::shared_ptr<Environment> tool_selection_environment() {
  auto env = std::make_shared<Environment>("tool-selection");
  add_agents(*env);
  env->set_task_generator({TaskKind::kFunctionCall}, [](TaskKind, std::uint64_t seed) {
    return function_call_task("tool-selection", seed);
  });
  return env;
}

std::shared_ptr<Environment> cooperative_environment() {
  auto env = std::make_shared<Environment>("cooperative");
  // Only the tools the four task templates need, plus one distractor each.
  static const std::set<std::string_view> kTools{
      "check_shop_expenses", "query_logistics", "query_settlement", "apply_refund",
      "currency_exchange",   "stock_quote",     "add",              "subtract",
      "multiply",            "divide"};
  add_agents(*env, [](std::string_view tool) { return kTools.count(tool) > 0; });
  env->set_task_generator({TaskKind::kCooperative}, [](TaskKind, std::uint64_t seed) {
    return cooperative_task("cooperative", seed);
  });
  return env;
}

}  // namespace

std::shared_ptr<Environment> make_environment(std::string_view name) {
  if (name == "routing") return routing_environment();
  if (name == "tool-selection") return tool_selection_environment();
  if (name == "cooperative") return cooperative_environment();
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

std::vector<std::string> environment_names() {
  return {"routing", "tool-selection", "cooperative"};
}

RequestHandler uniform_tool_handler(const Environment& env) {
  auto call_text = [](const std::string& name) {
    return "<think>use " + name + "</think><tool_call>" +
           nlohmann::json{{"name", name}}.dump() + "</tool_call>";
  };
  std::map<std::string, RequestHandler> handlers;
  std::vector<std::string> master_texts;
  for (const auto& info : env.sub_agents()) {
    master_texts.push_back(call_text(info.id));
    std::vector<std::string> texts;
    for (const auto& tool : info.tools) texts.push_back(call_text(tool));
    handlers.emplace(info.id, uniform_choice_handler(std::move(texts)));
  }
  auto master = uniform_choice_handler(std::move(master_texts));
  return [handlers = std::move(handlers), master = std::move(master)](
             const RemoteRequest& request) {
    const auto it = handlers.find(request.agent_id);
    return it == handlers.end() ? master(request) : it->second(request);
  };
}

}  // namespace jointrl
