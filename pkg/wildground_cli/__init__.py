"""Command line interface of :mod:`wildground`.

.. code-block:: console

    $ wildground generate --out data --train 500 --test 125
    $ wildground train --config run.toml --out runs/full
    $ wildground eval --checkpoint runs/full/checkpoints/best.wgckpt \
        --dataset data/manifest.txt --out runs/full/eval

"""
from ._cli import cli

__all__ = ["cli"]
