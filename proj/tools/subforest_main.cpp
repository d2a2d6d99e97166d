#include "subforest/cli.hpp"

int main(int argc, char** argv)
{
    return subforest::cli::run(argc, argv);
}
