int run_cli(int, char**);

int main(int argc, char** argv) { return run_cli(argc, argv); }
