// Standalone deterministic chat-completion endpoint for offline pipeline runs.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "ecgforge/mock_llm.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deterministic mock chat-completion server"};
    int port = 0;
    app.add_option("--port", port, "port to bind (0 = pick a free one)");
    CLI11_PARSE(app, argc, argv);

    // MockLlmServer always picks a free port; honor --port with a direct
    // server when one was requested.
    if (port == 0) {
        ecgforge::MockLlmServer server;
        server.start();
        std::cout << "listening on " << server.base_url() << std::endl;
        pause();
        return 0;
    }

    httplib::Server server;
    server.Post("/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        std::string prompt;
        try {
            const auto j = nlohmann::json::parse(req.body);
            for (const auto& m : j.at("messages")) {
                if (m.at("role") == "user") prompt = m.at("content").get<std::string>();
            }
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            return;
        }
        nlohmann::json out;
        out["choices"] = {{{"message", {{"role", "assistant"},
                                        {"content", ecgforge::MockLlmServer::response_for(prompt)}}}}};
        res.set_content(out.dump(), "application/json");
    });
    std::cout << "listening on http://127.0.0.1:" << port << std::endl;
    return server.listen("127.0.0.1", port) ? 0 : 1;
}
