#include "facefit/cli.hpp"

int main(int argc, char** argv)
{
    return facefit::run_cli(argc, argv);
}
