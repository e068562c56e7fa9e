# tests/fabricas.py
"""Fábricas compartidas por los tests: modelos diminutos, instancias y configuración mínima."""
import numpy as np

from core.domain.edicion import EditInstance, RankedQuery
from core.domain.modelo_lm import ModelConfig, init_model, lm_loss
from core.domain.tensor import ComputationTape, backward
from core.domain.tokenizer import Tokenizer
from core.shared.enums import ModoTokenizer, RangoConsulta

TOKENIZER_BYTES = Tokenizer(ModoTokenizer.BYTE)


def config_diminuta(**cambios) -> ModelConfig:
    base = dict(vocab_size=TOKENIZER_BYTES.vocab_size, dim=16, n_layers=1, n_heads=2, mlp_hidden=32,
                max_seq_len=160, seed=0)
    base.update(cambios)
    return ModelConfig(**base)


def modelo_diminuto(**cambios):
    return init_model(config_diminuta(**cambios))


def instancia(id_="e-1", texto=None, respuesta="Zorba"):
    texto = texto or f"Ada Quill played for {respuesta} from 1990 to 1995 and won three national cups there."
    consultas = (
        RankedQuery(RangoConsulta.R1_MEMORY, "Ada Quill played for", respuesta),
        RankedQuery(RangoConsulta.R2_COMPREHENSION, "Which team did Ada Quill play for?", respuesta),
        RankedQuery(RangoConsulta.R3_CONSTRAINED, "In 1992, which team was Ada Quill with?", respuesta),
        RankedQuery(RangoConsulta.R4_REASONING, "For how many years was Ada Quill with the team?", "5"),
    )
    return EditInstance(id=id_, edit_text=texto, queries=consultas, metadata={"domain": "sports"})


def gradientes_autodiff(params, tokens):
    params.zero_grad()
    with ComputationTape():
        backward(lm_loss(params, tokens))
    return params.grads()


def cercanos(analitico, numerico, rtol=1e-4, atol=1e-8) -> bool:
    return bool(np.all(np.abs(analitico - numerico) <= rtol * np.maximum(np.abs(analitico), np.abs(numerico)) + atol))


CONFIG_YAML_DIMINUTA = """
model:
  dim: 16
  n_layers: 1
  n_heads: 2
  mlp_hidden: 32
  max_seq_len: 192
tokenizer:
  mode: byte
corpus:
  n_instances: 4
pretrain:
  max_steps: 30
  learning_rate: 0.01
noise:
  alpha: 5.0
fusion:
  k: 20.0
engine:
  epochs_per_edit: 2
  lr: 0.003
  checkpoint_every: 1
eval:
  every: 1
  coeff: 0.5
  max_new: 4
  checkpoints: [2, 4]
seeds:
  model: 0
  corpus: 0
  run: 0
"""
