#include "cdcnn/cli.hpp"

int main(int argc, char** argv) { return cdcnn::dispatch(argc, argv); }
