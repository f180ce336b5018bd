#include "shev/cli.hpp"

int main(int argc, char** argv)
{
    return shev::cli::run(argc, argv);
}
