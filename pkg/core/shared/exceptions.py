"""
Excepciones de Negocio Personalizadas (Core).

Estas excepciones son lanzadas por el dominio, los servicios y los casos de uso,
y deben ser atrapadas por la capa de Infraestructura (Management Commands) para
convertirlas en códigos de salida adecuados (ver `CODIGOS_SALIDA`).
"""

class BaseExcepcionDeNegocio(Exception):
    """Excepción raíz para todos los errores controlados del dominio."""
    pass

# =============================================================================
# 1. EXCEPCIONES GENÉRICAS
# =============================================================================

class EntityNotFoundException(BaseExcepcionDeNegocio):
    """
    Error genérico cuando no se encuentra un artefacto (checkpoint, corrida, corpus).
    Uso: raise EntityNotFoundException("El checkpoint runs/base.npz no existe.")
    """
    pass

class ContractViolationException(BaseExcepcionDeNegocio):
    """
    Violación de un contrato de programación (formas, índices, arquitectura).
    No depende de los datos del operador: indica un bug del llamador.
    """
    pass

class ConfiguracionError(BaseExcepcionDeNegocio):
    """Configuración de corrida inválida (archivo YAML, coeficientes, vocabulario)."""
    pass

class DatosInvalidosError(BaseExcepcionDeNegocio):
    """Datos de entrada inválidos (texto de edición, corpus JSONL, consultas)."""
    pass

class DivergenciaError(BaseExcepcionDeNegocio):
    """La optimización produjo valores no finitos (pérdida o gradiente)."""
    pass


# =============================================================================
# 2. EXCEPCIONES ESPECÍFICAS
# =============================================================================

# --- Contratos ---

class DimensionError(ContractViolationException):
    """Formas incompatibles entre tensores. El mensaje nombra ambas formas."""
    pass

class IndiceFueraDeRangoError(ContractViolationException, IndexError):
    """Id de token u objetivo fuera de [0, V)."""
    pass

class ArquitecturaIncompatibleError(ContractViolationException):
    """Se intentó fusionar o comparar modelos con arquitecturas distintas."""
    pass

class GradienteFaltanteError(ContractViolationException):
    """Falta el gradiente de algún componente al acumular importancia."""
    pass

# --- Configuración ---

class SumaCoeficientesError(ConfiguracionError):
    """beta + gamma + eta debe ser 1."""
    pass

class VocabularioIncompatibleError(ConfiguracionError):
    """El tokenizer y el checkpoint no comparten tamaño de vocabulario."""
    pass

# --- Datos ---

class EdicionVaciaError(DatosInvalidosError):
    """Texto vacío tras la normalización."""
    pass

class EdicionDegeneradaError(DatosInvalidosError):
    """Secuencia con menos de 2 tokens: no hay objetivo de siguiente token."""
    pass

class LongitudExcedidaError(DatosInvalidosError):
    """La secuencia supera max_seq_len del modelo."""
    pass

class CorpusParseError(DatosInvalidosError):
    """
    Líneas JSONL inválidas. Conserva los números de línea y los ids culpables
    para que el operador pueda corregir el archivo de una sola vez.
    """
    def __init__(self, mensaje: str, lineas=None, ids=None):
        super().__init__(mensaje)
        self.lineas = list(lineas or [])
        self.ids = list(ids or [])

# --- Divergencia ---

class ValorNoFinitoError(DivergenciaError):
    """Una operación produjo NaN o Inf."""
    pass

# --- No encontrados ---

class CheckpointNoEncontradoError(EntityNotFoundException):
    pass

class RunNoEncontradoError(EntityNotFoundException):
    pass


# =============================================================================
# 3. CÓDIGOS DE SALIDA (Management Commands)
# =============================================================================
# 2 queda reservado para errores de uso de argparse.
CODIGOS_SALIDA = {
    ConfiguracionError: 3,
    DatosInvalidosError: 4,
    EntityNotFoundException: 4,
    DivergenciaError: 5,
}

def codigo_salida_para(error: Exception) -> int:
    for tipo, codigo in CODIGOS_SALIDA.items():
        if isinstance(error, tipo):
            return codigo
    return 1
